#include "doctest.h"

TEST_SUITE("schedule") {}
