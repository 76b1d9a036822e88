#pragma once

#include "auginf/checkpoint.hpp"
#include "auginf/config.hpp"
#include "auginf/dataset.hpp"
#include "auginf/errors.hpp"
#include "auginf/grad.hpp"
#include "auginf/likelihood.hpp"
#include "auginf/logits.hpp"
#include "auginf/metrics.hpp"
#include "auginf/model.hpp"
#include "auginf/orbit.hpp"
#include "auginf/predict.hpp"
#include "auginf/rng.hpp"
#include "auginf/sampler.hpp"
#include "auginf/sgd.hpp"
#include "auginf/sweep.hpp"
#include "auginf/target.hpp"
#include "auginf/tensor.hpp"
#include "auginf/transform.hpp"
#include "auginf/vi.hpp"
