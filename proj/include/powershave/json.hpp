#pragma once

#include <json.hpp>

namespace powershave {
using Json = nlohmann::ordered_json;
}
