#pragma once

#include <string>
#include <vector>

namespace asep {

/// Outcome of one verification operation (identity check, lemma, probe).
struct CheckReport {
  std::string name;
  bool passed = true;
  bool conjecture = false;  // a failure is reportable, not a build error
  std::size_t trials = 0;
  std::size_t resamples = 0;
  double max_residual = 0.0;  // numeric mode only
  std::vector<std::string> notes;

  void fail(const std::string& what) {
    passed = false;
    notes.push_back(what);
  }
};

}  // namespace asep
