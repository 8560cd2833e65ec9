#include "doctest.h"

#include "conformal_kit/scores.hpp"
