#pragma once

#include <stdexcept>
#include <string>

namespace waveflow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define WAVEFLOW_DEFINE_ERROR(Name)        \
    struct Name : Error {                  \
        using Error::Error;                \
    }

// file I/O and parsing
WAVEFLOW_DEFINE_ERROR(MalformedHeader);
WAVEFLOW_DEFINE_ERROR(UnsupportedDatatype);
WAVEFLOW_DEFINE_ERROR(TruncatedData);
WAVEFLOW_DEFINE_ERROR(NonFiniteData);
WAVEFLOW_DEFINE_ERROR(IoError);

// shapes and argument domains
WAVEFLOW_DEFINE_ERROR(BadDims);
WAVEFLOW_DEFINE_ERROR(ShapeMismatch);
WAVEFLOW_DEFINE_ERROR(DomainError);
WAVEFLOW_DEFINE_ERROR(TooSmall);

// conditioning
WAVEFLOW_DEFINE_ERROR(UnknownVariable);
WAVEFLOW_DEFINE_ERROR(OutOfRange);

// runtime states
WAVEFLOW_DEFINE_ERROR(NonFiniteState);
WAVEFLOW_DEFINE_ERROR(StaleCache);
WAVEFLOW_DEFINE_ERROR(EmptySet);
WAVEFLOW_DEFINE_ERROR(NoRegions);
WAVEFLOW_DEFINE_ERROR(MissingCheckpoint);

#undef WAVEFLOW_DEFINE_ERROR

}  // namespace waveflow
