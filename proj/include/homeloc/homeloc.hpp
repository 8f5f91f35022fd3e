#pragma once

#include "homeloc/csv.hpp"
#include "homeloc/dataset_io.hpp"
#include "homeloc/error.hpp"
#include "homeloc/evaluation.hpp"
#include "homeloc/geo_index.hpp"
#include "homeloc/hda.hpp"
#include "homeloc/minimization.hpp"
#include "homeloc/parallel.hpp"
#include "homeloc/random.hpp"
#include "homeloc/record_model.hpp"
#include "homeloc/reports.hpp"
#include "homeloc/synth.hpp"
#include "homeloc/time.hpp"
