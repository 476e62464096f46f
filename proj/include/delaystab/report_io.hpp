#pragma once

#include <string>

#include "delaystab/certification.hpp"

namespace delaystab::io_cli {

/// Flat key = value serialization of a certificate, 17 significant digits so
/// doubles survive the round trip exactly.
std::string report_to_kv(const certification::CertificateReport& report);
certification::CertificateReport parse_report_kv(const std::string& text);
void write_report_kv(const certification::CertificateReport& report, const std::string& path);
certification::CertificateReport read_report_kv(const std::string& path);

/// Human-readable certificate summary.
std::string report_to_text(const certification::CertificateReport& report);

}  // namespace delaystab::io_cli
