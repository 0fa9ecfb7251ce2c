#pragma once

#include "qbc/adversary.hpp"
#include "qbc/analysis.hpp"
#include "qbc/bits.hpp"
#include "qbc/boolfn.hpp"
#include "qbc/encode.hpp"
#include "qbc/experiment.hpp"
#include "qbc/protocol.hpp"
#include "qbc/quantum.hpp"
#include "qbc/rng.hpp"
#include "qbc/wire.hpp"
