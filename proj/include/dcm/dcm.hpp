#pragma once

#include <dcm/projective.hpp>
#include <dcm/laurent.hpp>
#include <dcm/lattice.hpp>
#include <dcm/spectral.hpp>
#include <dcm/flow.hpp>
#include <dcm/soliton.hpp>
#include <dcm/theta.hpp>
#include <dcm/dressing.hpp>
#include <dcm/io.hpp>
#include <dcm/svg.hpp>
