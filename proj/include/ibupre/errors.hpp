// ibupre/errors.hpp -- error taxonomy shared by all modules
#ifndef IBUPRE_ERRORS_HPP
#define IBUPRE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ibupre {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& w) : Error("dimension mismatch: " + w) {}
};

struct InvalidModulus : Error {
    explicit InvalidModulus(const std::string& w) : Error("invalid modulus: " + w) {}
};

struct CompositeModulus : Error {
    explicit CompositeModulus(const std::string& w) : Error("composite modulus: " + w) {}
};

struct InternalSamplerFailure : Error {
    explicit InternalSamplerFailure(const std::string& w) : Error("sampler failure: " + w) {}
};

struct ParameterTooSmall : Error {
    explicit ParameterTooSmall(const std::string& w) : Error("Gaussian parameter too small: " + w) {}
};

struct BudgetExceeded : Error {
    explicit BudgetExceeded(const std::string& w) : Error("error budget exceeded: " + w) {}
};

struct ZeroIdentity : Error {
    ZeroIdentity() : Error("identity must be a non-zero vector") {}
};

struct SelfDelegation : Error {
    SelfDelegation() : Error("re-encryption key endpoints must differ") {}
};

struct HopLimitExceeded : Error {
    HopLimitExceeded() : Error("ciphertext has already been re-encrypted (single-hop)") {}
};

struct IdentityMismatch : Error {
    explicit IdentityMismatch(const std::string& w) : Error("identity mismatch: " + w) {}
};

// serialization
struct BadMagic : Error {
    BadMagic() : Error("bad file magic") {}
};
struct ChecksumMismatch : Error {
    ChecksumMismatch() : Error("checksum mismatch") {}
};
struct KindMismatch : Error {
    explicit KindMismatch(const std::string& w) : Error("unexpected artifact kind: " + w) {}
};
struct InvariantViolation : Error {
    explicit InvariantViolation(const std::string& w) : Error("invariant violation: " + w) {}
};

} // namespace ibupre

#endif
