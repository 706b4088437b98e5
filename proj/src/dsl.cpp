namespace hahnforge {}
