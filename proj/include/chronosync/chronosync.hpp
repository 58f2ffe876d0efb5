#pragma once

#include "chronosync/agent.hpp"
#include "chronosync/analysis.hpp"
#include "chronosync/batch.hpp"
#include "chronosync/certificate.hpp"
#include "chronosync/config.hpp"
#include "chronosync/disturbance.hpp"
#include "chronosync/ensemble.hpp"
#include "chronosync/error.hpp"
#include "chronosync/graph.hpp"
#include "chronosync/linalg.hpp"
#include "chronosync/pipeline.hpp"
#include "chronosync/random.hpp"
#include "chronosync/report.hpp"
#include "chronosync/simulator.hpp"
