#include "doctest.h"

#include "conformal_kit/generators.hpp"
