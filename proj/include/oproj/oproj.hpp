#pragma once

// Umbrella header.

#include <oproj/csv.hpp>
#include <oproj/data_io.hpp>
#include <oproj/dense.hpp>
#include <oproj/errors.hpp>
#include <oproj/linalg.hpp>
#include <oproj/loco.hpp>
#include <oproj/metrics.hpp>
#include <oproj/model.hpp>
#include <oproj/ranking.hpp>
#include <oproj/report.hpp>
#include <oproj/subprocess_model.hpp>
#include <oproj/surrogate.hpp>
#include <oproj/synthetic.hpp>
#include <oproj/transforms.hpp>
