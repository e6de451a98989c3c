#pragma once

#include "specsense/clustering_fusion.hpp"
#include "specsense/compressive_acquisition.hpp"
#include "specsense/errors.hpp"
#include "specsense/experiment.hpp"
#include "specsense/fft.hpp"
#include "specsense/metrics.hpp"
#include "specsense/parallel.hpp"
#include "specsense/recovery_detection.hpp"
#include "specsense/results_io.hpp"
#include "specsense/rng.hpp"
#include "specsense/scenario.hpp"
#include "specsense/signal_model.hpp"
