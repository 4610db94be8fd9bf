#pragma once

// Umbrella header for the projection-bank library: dimension clustering,
// pairwise pseudo-labels, max-margin linear and kernel bit trainers,
// bit-packed encoding, and Hamming-distance retrieval evaluation.

#include "pbank/agd.hpp"
#include "pbank/codes.hpp"
#include "pbank/encoder.hpp"
#include "pbank/error.hpp"
#include "pbank/eval.hpp"
#include "pbank/hinge.hpp"
#include "pbank/kernel.hpp"
#include "pbank/kernel_trainer.hpp"
#include "pbank/linear_trainer.hpp"
#include "pbank/matrix.hpp"
#include "pbank/pair_labels.hpp"
#include "pbank/parallel.hpp"
#include "pbank/partition.hpp"
#include "pbank/rng.hpp"
