#pragma once

#include <stdexcept>
#include <string>

namespace mvpt {

// Base for all recoverable input/domain errors. The CLI maps these to
// exit code 1; std::logic_error (broken internal invariants) maps to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MVPT_DEFINE_ERROR(Name)              \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

// geometry
MVPT_DEFINE_ERROR(PointBehindCamera);
MVPT_DEFINE_ERROR(InsufficientViews);
MVPT_DEFINE_ERROR(DegenerateGeometry);
MVPT_DEFINE_ERROR(SchemaMismatch);
MVPT_DEFINE_ERROR(CalibrationError);

// silhouette
MVPT_DEFINE_ERROR(EmptyIntersection);
MVPT_DEFINE_ERROR(EmptyMask);
MVPT_DEFINE_ERROR(MaskDecodeError);

// matching
MVPT_DEFINE_ERROR(NoCalibration);
MVPT_DEFINE_ERROR(SingleView);

// tracking
MVPT_DEFINE_ERROR(NonFiniteDetection);
MVPT_DEFINE_ERROR(AssignmentMismatch);

// disambiguation
MVPT_DEFINE_ERROR(TooManyViews);

// metrics
MVPT_DEFINE_ERROR(NoValidKeypoints);
MVPT_DEFINE_ERROR(MissingBBox);
MVPT_DEFINE_ERROR(DegenerateScale);

// synthetic / config
MVPT_DEFINE_ERROR(InvalidConfig);

// pipeline ingestion
MVPT_DEFINE_ERROR(FormatError);

#undef MVPT_DEFINE_ERROR

}  // namespace mvpt
