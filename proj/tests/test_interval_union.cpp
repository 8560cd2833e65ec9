#include "doctest.h"

#include "conformal_kit/interval_union.hpp"
