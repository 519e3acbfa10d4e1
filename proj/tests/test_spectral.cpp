#include <doctest.h>

#include "nlstab/spectral.hpp"
