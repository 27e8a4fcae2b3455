#pragma once

#include "cifnet/activation.hpp"
#include "cifnet/buffer.hpp"
#include "cifnet/classifier_io.hpp"
#include "cifnet/dataset.hpp"
#include "cifnet/embedding_io.hpp"
#include "cifnet/error.hpp"
#include "cifnet/experiment.hpp"
#include "cifnet/incremental.hpp"
#include "cifnet/knowledge.hpp"
#include "cifnet/metrics.hpp"
#include "cifnet/rolann.hpp"
#include "cifnet/synthetic.hpp"
#include "cifnet/types.hpp"
