#include <doctest.h>

#include "nlstab/operators.hpp"
