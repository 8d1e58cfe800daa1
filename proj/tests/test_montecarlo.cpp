#include "doctest.h"

TEST_SUITE("montecarlo") {}
