#pragma once

#include "straem/common.hpp"
#include "straem/drift.hpp"
#include "straem/engine.hpp"
#include "straem/experiment.hpp"
#include "straem/iforest.hpp"
#include "straem/mnist.hpp"
#include "straem/neural.hpp"
#include "straem/prequential.hpp"
#include "straem/sliding_window.hpp"
#include "straem/snapshot.hpp"
#include "straem/streams.hpp"
#include "straem/threshold.hpp"
