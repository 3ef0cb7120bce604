/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#ifndef STREAMTRIAL_ANALYSIS_REPORT_HPP_
#define STREAMTRIAL_ANALYSIS_REPORT_HPP_

#include <streamtrial/analysis/compare.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace streamtrial::analysis {

/// Sorted keys, two-space indent, trailing newline. parse_report(to_json(r)) == r.
std::string to_json(const ComparisonReport& report);
/// Throws ConfigError on malformed documents or an unsupported schema_version.
ComparisonReport parse_report(std::string_view text);

std::string summary_markdown(const ComparisonReport& report);

/// Header "timestamp_ms,value,variant,metric,provenance".
std::string series_csv(const AggregatedSeries& series);

/// report.json, summary.md and series/<variant>__<metric>.csv.
/// Returns the files written, relative to `dir`. Throws Error if the directory is unwritable.
std::vector<std::string> write_report(const std::filesystem::path& dir, const Analysis& analysis);

}// namespace streamtrial::analysis

#endif// STREAMTRIAL_ANALYSIS_REPORT_HPP_
