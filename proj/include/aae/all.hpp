#pragma once

#include "aae/aae.hpp"
#include "aae/checkpoint.hpp"
#include "aae/encoding.hpp"
#include "aae/error.hpp"
#include "aae/evaluation.hpp"
#include "aae/export.hpp"
#include "aae/generator.hpp"
#include "aae/injection.hpp"
#include "aae/ledger.hpp"
#include "aae/neural.hpp"
#include "aae/random.hpp"
#include "aae/scoring.hpp"
