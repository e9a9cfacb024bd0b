#pragma once

#include "hilbert_flow/dataset.hpp"
#include "hilbert_flow/datasets.hpp"
#include "hilbert_flow/ensemble.hpp"
#include "hilbert_flow/errors.hpp"
#include "hilbert_flow/finite_difference.hpp"
#include "hilbert_flow/kernels.hpp"
#include "hilbert_flow/metrics.hpp"
#include "hilbert_flow/models.hpp"
#include "hilbert_flow/parallel.hpp"
#include "hilbert_flow/rng.hpp"
#include "hilbert_flow/runner.hpp"
#include "hilbert_flow/samplers.hpp"
#include "hilbert_flow/softmax.hpp"
#include "hilbert_flow/targets.hpp"
#include "hilbert_flow/vector_ops.hpp"
