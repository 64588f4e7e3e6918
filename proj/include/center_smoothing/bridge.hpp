#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "center_smoothing/base_functions.hpp"

namespace csmooth {

/// How to launch an external model speaking the newline-delimited JSON protocol:
///
///   request:  {"id": <int>, "input": [<reals>]}
///   response: {"id": <int>, "output": {"kind": ..., ...}}
///         or  {"id": <int>, "error": "<message>"}
///
/// Responses may arrive in any order and are matched by id.
struct BridgeSpec {
    std::vector<std::string> argv;
    std::chrono::milliseconds timeout{30000};
    OutputKind output_kind = OutputKind::vector;
    std::optional<std::size_t> input_dimension;
};

/// Spawns the process and returns a single-flight BaseFunction that forwards
/// each batch as pipelined requests. Failures (timeout, malformed response,
/// process exit) raise EvaluationError whose index() is the request id.
BaseFunctionPtr bridge_function(const BridgeSpec& spec);

/// Wire encoding of an output point, e.g. {"kind": "box", "box": [x0, y0, x1, y1]}
/// or {"kind": "box", "box": null} for Empty.
nlohmann::json output_to_json(const OutputPoint& point);
/// Throws DomainError for unknown kinds or missing fields.
OutputPoint output_from_json(const nlohmann::json& j);

}  // namespace csmooth
