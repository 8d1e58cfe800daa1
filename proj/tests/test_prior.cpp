#include "doctest.h"

TEST_SUITE("prior") {}
