#ifndef WAVEFAULT_WAVEFAULT_HPP
#define WAVEFAULT_WAVEFAULT_HPP

#include "wavefault/classifiers.hpp"
#include "wavefault/dataset.hpp"
#include "wavefault/dtw.hpp"
#include "wavefault/error.hpp"
#include "wavefault/experiment.hpp"
#include "wavefault/generator_config.hpp"
#include "wavefault/keyvalue.hpp"
#include "wavefault/model.hpp"
#include "wavefault/pairwise_features.hpp"
#include "wavefault/parallel.hpp"
#include "wavefault/random.hpp"
#include "wavefault/relative_features.hpp"
#include "wavefault/reporting.hpp"
#include "wavefault/signal_model.hpp"
#include "wavefault/synthgen.hpp"

#endif // WAVEFAULT_WAVEFAULT_HPP
