#pragma once

#include <stdexcept>
#include <string>

namespace soapguard {

// Coarse failure categories; the CLI maps them onto its exit-code contract
// (2 = input, 3 = reference, 4 = key, 5 = attack validity).
enum class ErrorCategory { Input, Reference, Key, Attack };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

#define SOAPGUARD_DEFINE_ERROR(NAME, CATEGORY)                          \
    class NAME : public Error {                                        \
    public:                                                             \
        explicit NAME(const std::string& what = #NAME)                  \
            : Error(ErrorCategory::CATEGORY, what) {}                   \
    };

SOAPGUARD_DEFINE_ERROR(MalformedXml, Input)
SOAPGUARD_DEFINE_ERROR(NotAnEnvelope, Input)
SOAPGUARD_DEFINE_ERROR(BadTimestampFormat, Input)
SOAPGUARD_DEFINE_ERROR(InvalidHeaderName, Input)
SOAPGUARD_DEFINE_ERROR(ScenarioInvalid, Input)
SOAPGUARD_DEFINE_ERROR(IoError, Input)

SOAPGUARD_DEFINE_ERROR(InvalidPath, Reference)
SOAPGUARD_DEFINE_ERROR(RootHasNoParent, Reference)
SOAPGUARD_DEFINE_ERROR(ReferenceNotFound, Reference)
SOAPGUARD_DEFINE_ERROR(AmbiguousReference, Reference)
SOAPGUARD_DEFINE_ERROR(NoSignatureFound, Reference)
SOAPGUARD_DEFINE_ERROR(NoSignedBody, Reference)
SOAPGUARD_DEFINE_ERROR(NoAccountPresent, Reference)
SOAPGUARD_DEFINE_ERROR(NeedTwoSignedElements, Reference)
SOAPGUARD_DEFINE_ERROR(AlreadyGuarded, Reference)

SOAPGUARD_DEFINE_ERROR(UnknownKey, Key)
SOAPGUARD_DEFINE_ERROR(KeyStoreError, Key)

#undef SOAPGUARD_DEFINE_ERROR

}  // namespace soapguard
