#include <doctest.h>

#include "nlstab/dynamics.hpp"
