#include "doctest.h"

TEST_SUITE("numeric") {}
