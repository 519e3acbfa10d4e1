#include <doctest.h>

#include "nlstab/pipeline.hpp"
