#pragma once

#include "thzlab/absorption.hpp"
#include "thzlab/baseline.hpp"
#include "thzlab/errors.hpp"
#include "thzlab/experiments.hpp"
#include "thzlab/neural.hpp"
#include "thzlab/quadrature.hpp"
#include "thzlab/rate.hpp"
#include "thzlab/scenario.hpp"
#include "thzlab/spectrum.hpp"
#include "thzlab/trainer.hpp"
