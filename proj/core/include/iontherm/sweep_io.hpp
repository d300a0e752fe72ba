#pragma once

#include <string>

#include "iontherm/dynamics.hpp"

// Fock-sweep library exchange format: one JSON document
//   {"config": {...}, "times_us": [...], "p": [[[...]]]}
// with p indexed [n][ion][time]. Doubles are written in shortest
// round-trip form, so write -> read is bit exact.

namespace iontherm {

std::string sweep_to_json(const FockSweepLibrary& lib);
FockSweepLibrary sweep_from_json(const std::string& text);

struct sweep_format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace iontherm
