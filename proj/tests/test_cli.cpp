#include "doctest.h"

#include "conformal_kit/cli.hpp"
