#pragma once

#include <functional>

#include <doctest.h>

#include "critpop/error.hpp"

// Runs f and checks it raises critpop::Error with the given code; returns the message.
inline std::string expect_error(critpop::ErrorCode code, const std::function<void()>& f) {
  try {
    f();
  } catch (const critpop::Error& e) {
    CHECK_MESSAGE(e.code() == code, e.what());
    return e.what();
  }
  FAIL("no critpop::Error raised");
  return {};
}

inline Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}
