#include "doctest.h"

#include "conformal_kit/report_io.hpp"
