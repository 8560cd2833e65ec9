#include "doctest.h"

#include "conformal_kit/experiments.hpp"
