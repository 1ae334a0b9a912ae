#pragma once

#include "otfs/alphabet.hpp"
#include "otfs/channel.hpp"
#include "otfs/common.hpp"
#include "otfs/dd_io.hpp"
#include "otfs/detector.hpp"
#include "otfs/estimator.hpp"
#include "otfs/grid.hpp"
#include "otfs/harness.hpp"
#include "otfs/layout.hpp"
#include "otfs/tf_oracle.hpp"
