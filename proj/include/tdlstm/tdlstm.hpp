#pragma once

// Umbrella header.
#include "tdlstm/cells.hpp"
#include "tdlstm/checkpoint.hpp"
#include "tdlstm/data.hpp"
#include "tdlstm/embeddings.hpp"
#include "tdlstm/errors.hpp"
#include "tdlstm/evaluation.hpp"
#include "tdlstm/gradcheck.hpp"
#include "tdlstm/gradients.hpp"
#include "tdlstm/models.hpp"
#include "tdlstm/random.hpp"
#include "tdlstm/synthetic.hpp"
#include "tdlstm/tape.hpp"
#include "tdlstm/tensor.hpp"
#include "tdlstm/training.hpp"
