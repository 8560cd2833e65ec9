#include "doctest.h"

#include "conformal_kit/predictors.hpp"
