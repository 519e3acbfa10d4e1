#include <doctest.h>

#include "nlstab/fgr.hpp"
