#pragma once

#include "shallownet/augment.hpp"
#include "shallownet/checkpoint.hpp"
#include "shallownet/dataset.hpp"
#include "shallownet/error.hpp"
#include "shallownet/gradcam.hpp"
#include "shallownet/image.hpp"
#include "shallownet/layers.hpp"
#include "shallownet/metrics.hpp"
#include "shallownet/model.hpp"
#include "shallownet/rng.hpp"
#include "shallownet/tensor.hpp"
#include "shallownet/train.hpp"
