#pragma once

#include "irs/error.hpp"
#include "irs/dataset.hpp"
#include "irs/partition.hpp"
#include "irs/distance.hpp"
#include "irs/estimator.hpp"
#include "irs/mutual_information.hpp"
#include "irs/scm.hpp"
#include "irs/oracle.hpp"
#include "irs/io.hpp"
#include "irs/viz.hpp"
#include "irs/report_json.hpp"
