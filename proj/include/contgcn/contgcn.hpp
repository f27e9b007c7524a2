#pragma once

// Umbrella header for the continual graph-convolutional text classifier.

#include "contgcn/config.hpp"
#include "contgcn/dataset.hpp"
#include "contgcn/encoder.hpp"
#include "contgcn/errors.hpp"
#include "contgcn/gcn.hpp"
#include "contgcn/graph.hpp"
#include "contgcn/io.hpp"
#include "contgcn/losses.hpp"
#include "contgcn/matrix.hpp"
#include "contgcn/model.hpp"
#include "contgcn/omm.hpp"
#include "contgcn/parallel.hpp"
#include "contgcn/pipeline.hpp"
#include "contgcn/sparse.hpp"
#include "contgcn/train.hpp"
#include "contgcn/vocab.hpp"
