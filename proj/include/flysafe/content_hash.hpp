#pragma once

#include <string>
#include <string_view>

namespace flysafe {

/// Lowercase hex SHA-1 of "blob <size>\0<bytes>", the object id git assigns.
std::string git_blob_sha1(std::string_view bytes);

}  // namespace flysafe
