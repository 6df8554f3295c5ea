#pragma once

#include <stdexcept>
#include <string>

namespace ctphish {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// cert-core
class MalformedDer : public Error { public: using Error::Error; };

// ctlog-client
class LogUnreachable : public Error { public: using Error::Error; };
class MalformedResponse : public Error { public: using Error::Error; };
class RangeRejected : public Error { public: using Error::Error; };
class LeafDecodeError : public Error { public: using Error::Error; };
class EmptySpan : public Error { public: using Error::Error; };

// intel-store
class UnknownFormat : public Error { public: using Error::Error; };
class StoreError : public Error { public: using Error::Error; };

// dataset-builder / classifiers / features
class EmptyClass : public Error { public: using Error::Error; };
class DimensionMismatch : public Error { public: using Error::Error; };
class EmptyInput : public Error { public: using Error::Error; };
class UntrainedModel : public Error { public: using Error::Error; };
class ModelFormatError : public Error { public: using Error::Error; };

// evaluate
class DegenerateSet : public Error { public: using Error::Error; };

// cli-config
class SpecInvalid : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

}  // namespace ctphish
