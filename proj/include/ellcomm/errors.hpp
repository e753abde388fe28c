#pragma once

#include <stdexcept>
#include <string>

namespace ellcomm {

// Base class for every error raised by the library. The concrete
// subclasses mirror the failure modes callers are expected to branch on.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

#define ELLCOMM_DEFINE_ERROR(Name)                                   \
    class Name : public Error                                        \
    {                                                                \
    public:                                                          \
        explicit Name(const std::string &what) : Error(#Name ": " + what) {} \
    }

ELLCOMM_DEFINE_ERROR(InvalidTorus);
ELLCOMM_DEFINE_ERROR(PoleProximity);
ELLCOMM_DEFINE_ERROR(WindowUnderflow);
ELLCOMM_DEFINE_ERROR(DegenerateFunction);
ELLCOMM_DEFINE_ERROR(RankDeficient);
ELLCOMM_DEFINE_ERROR(DegenerateDivisor);
ELLCOMM_DEFINE_ERROR(DegenerateState);
ELLCOMM_DEFINE_ERROR(SingularConfiguration);
ELLCOMM_DEFINE_ERROR(ConfigInvalid);
ELLCOMM_DEFINE_ERROR(SchemaMismatch);

#undef ELLCOMM_DEFINE_ERROR

} // namespace ellcomm
