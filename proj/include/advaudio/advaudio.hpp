// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "advaudio/attack.hpp"
#include "advaudio/audio_io.hpp"
#include "advaudio/ctc.hpp"
#include "advaudio/decode.hpp"
#include "advaudio/error.hpp"
#include "advaudio/harness.hpp"
#include "advaudio/matrix.hpp"
#include "advaudio/metrics.hpp"
#include "advaudio/model.hpp"
#include "advaudio/pca.hpp"
#include "advaudio/rng.hpp"
#include "advaudio/spectral.hpp"
