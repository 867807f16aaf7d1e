#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace l0dc {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter (budget, penalty, step) lies outside its admissible range.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

class OracleLimitExceeded : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside an iterative or direct solver.
class SolverError : public Error {
 public:
  using Error::Error;
};

inline void require_size(Index got, Index want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": expected length " + std::to_string(want) +
                            ", got " + std::to_string(got));
  }
}

}  // namespace l0dc
