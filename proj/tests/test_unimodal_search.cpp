#include "doctest.h"

#include "conformal_kit/conformal_sets.hpp"
