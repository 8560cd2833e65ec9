#include "doctest.h"

#include "conformal_kit/levy_gauge.hpp"
