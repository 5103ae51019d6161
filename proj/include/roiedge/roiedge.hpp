#pragma once

#include "roiedge/cam.hpp"
#include "roiedge/config.hpp"
#include "roiedge/error.hpp"
#include "roiedge/features.hpp"
#include "roiedge/geometry.hpp"
#include "roiedge/ground_truth.hpp"
#include "roiedge/link.hpp"
#include "roiedge/oracle.hpp"
#include "roiedge/partition.hpp"
#include "roiedge/policy.hpp"
#include "roiedge/protocol.hpp"
#include "roiedge/random.hpp"
#include "roiedge/roi.hpp"
#include "roiedge/scenario.hpp"
#include "roiedge/sim.hpp"
#include "roiedge/tensor.hpp"
