#pragma once

// Umbrella header: the whole engine. Pull in individual headers instead when
// compile time matters; http_policy.hpp in particular brings the HTTP stack.

#include "ics/answer_kit.hpp"
#include "ics/baselines.hpp"
#include "ics/correction_loop.hpp"
#include "ics/errors.hpp"
#include "ics/evalkit.hpp"
#include "ics/generation.hpp"
#include "ics/harness.hpp"
#include "ics/localization.hpp"
#include "ics/policy_client.hpp"
#include "ics/prompts.hpp"
#include "ics/reasoning_tree.hpp"
#include "ics/report.hpp"
#include "ics/run_record.hpp"
#include "ics/tokenize.hpp"
#include "ics/verification.hpp"
