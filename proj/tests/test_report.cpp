#include "doctest.h"

TEST_SUITE("report") {}
