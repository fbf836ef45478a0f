#pragma once

#include "mmf/errors.hpp"
#include "mmf/rng.hpp"
#include "mmf/model.hpp"
#include "mmf/measures.hpp"
#include "mmf/payoff.hpp"
#include "mmf/pricing.hpp"
#include "mmf/decomposition.hpp"
#include "mmf/estimation.hpp"
#include "mmf/oracle.hpp"
#include "mmf/report_json.hpp"
#include "mmf/model_io.hpp"
