#pragma once

// Umbrella header: pulls in the whole library.  Individual headers are
// self-contained; include them directly if compile time matters.

#include "baselines.hpp"
#include "checkpoint.hpp"
#include "common.hpp"
#include "config.hpp"
#include "diffusion.hpp"
#include "image.hpp"
#include "io.hpp"
#include "jsonio.hpp"
#include "linalg.hpp"
#include "manifest.hpp"
#include "mask.hpp"
#include "metrics.hpp"
#include "net.hpp"
#include "optim.hpp"
#include "oracle.hpp"
#include "phantom.hpp"
#include "rng.hpp"
#include "schedule.hpp"
#include "train.hpp"
#include "volume.hpp"
