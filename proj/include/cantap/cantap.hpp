#pragma once
/// Umbrella header for the cantap library: a bit-accurate discrete-time
/// simulator of a CAN 2.0A bus with attacker nodes and a transmit-line
/// guardian that detects and prevents injection attacks.

#include "bits.hpp"
#include "crc.hpp"
#include "frame.hpp"
#include "decoder.hpp"
#include "bus.hpp"
#include "controller.hpp"
#include "nodes.hpp"
#include "attacks.hpp"
#include "officer.hpp"
#include "scenario.hpp"
#include "harness.hpp"
