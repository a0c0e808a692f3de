#pragma once

#include "ltadmm/compressors.hpp"
#include "ltadmm/errors.hpp"
#include "ltadmm/estimators.hpp"
#include "ltadmm/harness.hpp"
#include "ltadmm/objectives.hpp"
#include "ltadmm/oracle.hpp"
#include "ltadmm/protocol.hpp"
#include "ltadmm/random.hpp"
#include "ltadmm/topology.hpp"
#include "ltadmm/types.hpp"
