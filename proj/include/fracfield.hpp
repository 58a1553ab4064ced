#pragma once

#include "fracfield/error.hpp"
#include "fracfield/linalg.hpp"
#include "fracfield/parallel.hpp"
#include "fracfield/domain.hpp"
#include "fracfield/spectral.hpp"
#include "fracfield/extension.hpp"
#include "fracfield/model.hpp"
#include "fracfield/barycenter.hpp"
#include "fracfield/nehari.hpp"
#include "fracfield/morse.hpp"
#include "fracfield/topology.hpp"
#include "fracfield/config.hpp"
#include "fracfield/run.hpp"
