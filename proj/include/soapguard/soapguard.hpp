#pragma once

#include "soapguard/account.hpp"
#include "soapguard/attack.hpp"
#include "soapguard/clock.hpp"
#include "soapguard/corpus.hpp"
#include "soapguard/crypto.hpp"
#include "soapguard/dsig.hpp"
#include "soapguard/errors.hpp"
#include "soapguard/guard.hpp"
#include "soapguard/keystore.hpp"
#include "soapguard/pipeline.hpp"
#include "soapguard/report.hpp"
#include "soapguard/soap.hpp"
#include "soapguard/xml.hpp"
