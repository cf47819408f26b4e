// Exception types shared across the library. Every throwing operation
// documents which of these it can raise.
#pragma once

#include <stdexcept>

namespace mlab {

// Root of the library error hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input matrix or vector contains NaN or Inf.
class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

// A matrix or batch has an illegal or inconsistent shape.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// Two kernel matrices differ in row count.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Two activation matrices differ in row count.
class RowCountMismatch : public Error {
 public:
  using Error::Error;
};

// center_kernel called on a kernel whose centered flag is already set.
class AlreadyCentered : public Error {
 public:
  using Error::Error;
};

// hsic called on a kernel whose centered flag is not set.
class NotCentered : public Error {
 public:
  using Error::Error;
};

// Self-HSIC of an activation matrix vanished; CKA is undefined.
class DegenerateActivations : public Error {
 public:
  using Error::Error;
};

// Two checkpoints do not share an architecture descriptor.
class ArchitectureMismatch : public Error {
 public:
  using Error::Error;
};

// Training loss became NaN or Inf.
class DivergedTraining : public Error {
 public:
  using Error::Error;
};

// Pruning would remove every unit of a layer.
class AllPruned : public Error {
 public:
  using Error::Error;
};

// A file could not be parsed (bad magic, version, or syntax).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A parsed value violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem read or write failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Not enough data points to compute a statistic.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace mlab
