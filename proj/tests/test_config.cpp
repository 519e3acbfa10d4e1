#include <doctest.h>

#include "nlstab/config.hpp"
