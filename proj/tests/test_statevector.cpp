#include "doctest.h"

TEST_SUITE("statevector") {}
